import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        String moves = sc.next();
        int posX = 0;
        int posY = 0;
        for (int i = 0; i < moves.length(); i++) {
            char step = moves.charAt(i);
            switch (step) {
                case 'U':
                    posY++;
                    break;
                case 'D':
                    posY--;
                    break;
                case 'L':
                    posX--;
                    break;
                case 'R':
                    posX++;
                    break;
                default:
                    break;
            }
        }
        int dist = Math.abs(posX) + Math.abs(posY);
        System.out.println(posX + " " + posY + " " + dist);
    }
}
