import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        String deck = sc.next();
        int shuffles = sc.nextInt();
        for (int i = 0; i < shuffles; i++) {
            int h = sc.nextInt();
            deck = deck.substring(h) + deck.substring(0, h);
        }
        System.out.println(deck);
    }
}
