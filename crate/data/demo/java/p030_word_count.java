import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        String target = sc.next().toLowerCase();
        int occurrences = 0;
        while (sc.hasNext()) {
            String word = sc.next();
            if (word.equals("END_OF_TEXT")) {
                break;
            }
            if (word.toLowerCase().equals(target)) {
                occurrences++;
            }
        }
        System.out.println(occurrences);
    }
}
