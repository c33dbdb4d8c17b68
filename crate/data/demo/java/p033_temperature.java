import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int celsius = sc.nextInt();
        int fahrenheit = celsius * 9 / 5 + 32;
        String label;
        if (celsius >= 30) {
            label = "hot";
        } else if (celsius >= 15) {
            label = "mild";
        } else {
            label = "cold";
        }
        System.out.println(fahrenheit + " " + label);
    }
}
